fn main() {
    std::process::exit(crnt::cli::main(std::env::args_os()));
}
