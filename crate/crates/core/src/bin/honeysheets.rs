fn main() {
    std::process::exit(honeysheets::cli::run(std::env::args_os().skip(1)));
}
