use std::io::IsTerminal;

fn main() {
    let color = std::io::stdout().is_terminal() && std::env::var_os("CA_NO_COLOR").is_none();
    let (stdout, stderr) = (std::io::stdout(), std::io::stderr());
    let code = comm_analysis::cli::run_cli_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock(), color);
    std::process::exit(code);
}
