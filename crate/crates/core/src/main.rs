fn main() {
    std::process::exit(bvp4::cli::run(std::env::args_os()));
}
