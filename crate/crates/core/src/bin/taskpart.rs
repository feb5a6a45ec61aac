fn main() {
    std::process::exit(taskpart::cli::run(std::env::args_os()));
}
