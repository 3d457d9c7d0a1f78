fn main() {
    std::process::exit(berrymorph::cli::run(std::env::args_os()));
}
