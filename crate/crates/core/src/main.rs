use dqc_core::cli::{execute, parse_args};

fn main() {
    let config = match parse_args(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    std::process::exit(execute(&config));
}
