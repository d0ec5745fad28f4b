fn main() {
    std::process::exit(mpstomo::cli::main());
}
