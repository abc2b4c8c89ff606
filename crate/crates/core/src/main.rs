fn main() {
    std::process::exit(glance::cli::run(std::env::args_os()));
}
