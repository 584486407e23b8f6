fn main() {
    std::process::exit(discre::cli::dispatch(std::env::args_os()));
}
