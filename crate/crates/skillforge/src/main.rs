fn main() {
    std::process::exit(skillforge::cli::run(std::env::args()));
}
