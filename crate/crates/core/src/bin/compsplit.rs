fn main() {
    std::process::exit(compsplit::cli::run(std::env::args_os()));
}
