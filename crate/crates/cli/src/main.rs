fn main() {
    std::process::exit(gpa_cli::run(std::env::args_os()));
}
