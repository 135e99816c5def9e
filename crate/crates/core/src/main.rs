fn main() {
    std::process::exit(proxnewton::cli::run(std::env::args_os()));
}
