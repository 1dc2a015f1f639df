fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    let code = carbon_ledger::cli::run(&args, &mut stdout, &mut stderr);
    std::process::exit(code);
}
