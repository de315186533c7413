fn main() {
    std::process::exit(dynwarp::cli::run());
}
