fn main() {
    std::process::exit(qtsp_cli::run(std::env::args_os()));
}
