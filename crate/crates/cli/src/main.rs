fn main() {
    std::process::exit(drlc::run(std::env::args_os()));
}
