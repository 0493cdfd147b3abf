fn main() {
    std::process::exit(loewner_cli::main_with(std::env::args_os()));
}
