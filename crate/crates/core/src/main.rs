use std::io::{self, BufWriter, Write};
use std::process;

use fpcounter::cli;

fn main() {
    let config = match cli::parse_args(std::env::args_os().skip(1)) {
        Ok(config) => config,
        Err(err) => err.exit(),
    };
    let mut out = BufWriter::new(io::stdout().lock());
    let result = cli::execute(&config, &mut out).and_then(|()| Ok(out.flush()?));
    if let Err(err) = result {
        eprintln!("fpcounter: {err}");
        process::exit(cli::exit_code(&err));
    }
}
