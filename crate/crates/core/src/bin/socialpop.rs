fn main() {
    std::process::exit(socialpop::cli::run_from_env());
}
