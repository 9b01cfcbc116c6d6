fn main() {
    std::process::exit(kpp_lab::cli::main_with_args(std::env::args_os()));
}
