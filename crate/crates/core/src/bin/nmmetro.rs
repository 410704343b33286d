fn main() {
    std::process::exit(nmmetro::cli::main_with_args(std::env::args_os()));
}
