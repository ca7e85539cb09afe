fn main() {
    std::process::exit(chosen_path::cli::run(std::env::args_os()));
}
