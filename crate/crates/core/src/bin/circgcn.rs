fn main() {
    std::process::exit(circgcn::cli::run(std::env::args_os()));
}
