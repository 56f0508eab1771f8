fn main() {
    std::process::exit(cardiofocus::cli::cli_main(std::env::args_os()));
}
