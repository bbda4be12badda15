fn main() {
    std::process::exit(quizforge::run(std::env::args_os()));
}
