fn main() {
    std::process::exit(qutrit_chain::cli::main());
}
