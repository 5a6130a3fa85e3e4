fn main() {
    std::process::exit(lempert_cli::main_with_args(std::env::args_os()));
}
