fn main() {
    std::process::exit(pcm_detect::cli::run(std::env::args_os()));
}
