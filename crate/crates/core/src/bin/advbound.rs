fn main() {
    std::process::exit(advbound::cli::main_with(std::env::args_os()));
}
