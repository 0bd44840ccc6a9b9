fn main() {
    std::process::exit(wedge_cli::run(std::env::args_os()));
}
