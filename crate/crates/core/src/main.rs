fn main() {
    let code = dielectric_ml::cli::main_with_args(std::env::args_os());
    dielectric_ml::cli::flush_stdout();
    std::process::exit(code);
}
