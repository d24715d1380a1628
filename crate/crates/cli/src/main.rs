fn main() {
    std::process::exit(pathlift::run())
}
