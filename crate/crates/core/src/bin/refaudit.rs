fn main() {
    std::process::exit(refaudit::cli::main_from_env());
}
