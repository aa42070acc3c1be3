fn main() {
    std::process::exit(bdnk_lab::cli::run(std::env::args_os()));
}
