fn main() {
    std::process::exit(procgen3d::cli::run(std::env::args_os()));
}
