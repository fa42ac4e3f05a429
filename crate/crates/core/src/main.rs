fn main() {
    std::process::exit(drpart::cli::main_with(std::env::args_os()));
}
