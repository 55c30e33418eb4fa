fn main() {
    std::process::exit(loopgraph::cli::execute(std::env::args_os()));
}
