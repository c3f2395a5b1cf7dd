fn main() {
    std::process::exit(ffil::run(std::env::args_os()));
}
