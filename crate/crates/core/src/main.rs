fn main() {
    std::process::exit(coalition_core::cli::main_entry());
}
