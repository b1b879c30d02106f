fn main() {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let code = bcsreg::cli::run(std::env::args(), &mut stdout, &mut stderr);
    std::process::exit(code);
}
