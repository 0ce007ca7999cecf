fn main() {
    let code = span_lab::cli::run(std::env::args_os());
    std::process::exit(code);
}
