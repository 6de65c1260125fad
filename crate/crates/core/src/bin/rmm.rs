fn main() {
    std::process::exit(midpoint_langevin::cli::run(std::env::args_os()));
}
