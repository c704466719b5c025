fn main() {
    std::process::exit(cxnet::cli::run(std::env::args_os()));
}
