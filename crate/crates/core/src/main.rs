fn main() {
    std::process::exit(gapseq::cli::run(std::env::args_os()));
}
