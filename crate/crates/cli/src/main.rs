fn main() {
    std::process::exit(regvar_cli::app::run(std::env::args_os()));
}
