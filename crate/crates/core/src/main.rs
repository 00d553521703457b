fn main() {
    std::process::exit(tvws::cli::run(std::env::args_os()));
}
