//! Newton divided differences against the contour integral.
use kostlan::kacrice::{contour_divided_difference, dd_matrix, divided_difference, ExpFunction, PolyFunction};
use kostlan::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let square = PolyFunction(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let pts = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
    println!("z²[1,2,3] = {}", divided_difference(&square, &pts)?);

    let f = ExpFunction {
        scale: c(1.0, 0.0),
        rate: c(0.3, -0.7),
    };
    let pts = [c(0.2, 0.1), c(-0.4, 0.5), c(0.2, 0.1), c(0.9, -0.3)];
    let newton = divided_difference(&f, &pts)?;
    let contour = contour_divided_difference(&f, &pts, c(0.0, 0.0), 2.0)?;
    println!("newton  {newton:.15}");
    println!("contour {contour:.15}");
    println!("|diff|  {:.3e}", (newton - contour).norm());

    let m = dd_matrix(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
    println!("det M(0,1,2) = {}", m.determinant());
    Ok(())
}
