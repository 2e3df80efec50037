use token_bias::runner::{parse_csv, report, ReportFormat};

const ROWS: &str = "\
model,prompting_method,n12,n21,n_star,z_stat,p_value,reject,p_value_adjusted,excluded_pairs
gpt-3.5-turbo,baseline,4,160,164,12.181553,0.000000,True,0.000000,0
gpt-3.5-turbo,zs_cot,30,28,58,-0.262613,0.603577,False,0.603577,2
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = parse_csv(ROWS)?;
    for format in ["csv", "json", "markdown"] {
        println!("--- {format} ---");
        println!("{}", report(&rows, format.parse::<ReportFormat>()?)?);
    }
    Ok(())
}
