fn main() {
    // quick probe of the erf implementations around the crossover
    for x in [1.999999999_f64, 2.0, 2.000000001, 2.5, 3.0] {
        println!("erf({x}) = {:.17}", kppsym::solutions::erf(x));
    }
}
