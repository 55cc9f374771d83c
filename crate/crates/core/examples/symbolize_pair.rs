//! Symbolizes a sentence pair, prints the rules line, and restores both sides.
//!
//! Usage: cargo run --example symbolize_pair

use ctxnmt::symbolizer::{desymbolize, desymbolize_side, symbolize_pair, Fallback, Side, SymbolizerConfig};

const EN: &str = "The World of Warcraft and Warcraft III American regional finals were held at the House of Blues on June 2nd and 3rd in San Diego , California .";
const FR: &str = "Les finales régionales de Warcraft III et de World of Warcraft pour l&apos; Amérique du Nord se sont déroulées au House of Blues , les 2 et 3 juin derniers à San Diego .";

fn main() {
    let src: Vec<&str> = EN.split(' ').collect();
    let tgt: Vec<&str> = FR.split(' ').collect();
    let out = symbolize_pair(1, &src, &tgt, &SymbolizerConfig::default());
    println!("source:  {}", out.source.join(" "));
    println!("target:  {}", out.target.join(" "));
    println!("rules:   {}", out.rules.to_line());
    let back = desymbolize(&out.target, &out.rules, Fallback::Literal);
    println!("restored target: {}", back.tokens.join(" "));
    let back = desymbolize_side(&out.source, &out.rules, Side::Source, Fallback::Literal);
    println!("restored source: {}", back.tokens.join(" "));

    // A lone unmatched acronym on each side is paired; two are left alone.
    let cfg = SymbolizerConfig::default();
    for (src, tgt) in [
        (vec!["the", "IMF", "said"], vec!["le", "FMI", "a", "dit"]),
        (vec!["the", "IMF", "and", "the", "EU"], vec!["le", "FMI", "et", "l'", "UE"]),
    ] {
        let out = symbolize_pair(2, &src, &tgt, &cfg);
        println!("\n{}  |  {}  |  rules: {}", out.source.join(" "), out.target.join(" "), out.rules.to_line());
    }
}
