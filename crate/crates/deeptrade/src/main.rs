fn main() {
    std::process::exit(deeptrade::cli::main_entry());
}
