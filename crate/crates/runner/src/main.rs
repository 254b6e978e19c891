fn main() {
    std::process::exit(uavnh_runner::cli::run(std::env::args_os()));
}
