use clap::Parser;

fn main() {
    let code = match lqgduet_cli::Cli::try_parse() {
        Ok(cli) => lqgduet_cli::run_cli(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
    };
    std::process::exit(code);
}
