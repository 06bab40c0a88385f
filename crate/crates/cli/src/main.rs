fn main() {
    std::process::exit(galtrans_cli::run(std::env::args_os()));
}
