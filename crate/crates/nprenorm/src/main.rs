fn main() {
    std::process::exit(nprenorm::cli::main_exit_code());
}
