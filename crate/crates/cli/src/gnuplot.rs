//! Companion gnuplot scripts. Each script reads files from its own directory.

pub fn thresholds() -> String {
    "\
set datafile separator ','
set xlabel 'N2/N1'
set ylabel 'lambda_c / kappa'
set yrange [0:3]
set key top left
plot 'thresholds.csv' using 1:2 with lines lw 2 title 'xFi', \\
     '' using 1:3 with lines lw 2 title 'xFo'
"
    .to_string()
}

pub fn stability_scan() -> String {
    "\
set datafile separator ','
set xlabel 'lambda'
set ylabel 'Re of leading eigenvalue'
set key outside
labels = '+zFo-N -zFo-N +zFi-N -zFi-N +xFo-SR -xFo-SR +xFi-SR -xFi-SR'
plot for [i=1:8] 'stability_scan.csv' using 1:(strcol(2) eq word(labels, i) ? $5 : NaN) with lines title word(labels, i)
"
    .to_string()
}

pub fn trajectory(title: &str) -> String {
    format!(
        "\
set datafile separator ','
set multiplot layout 3,1 title '{title}'
set ylabel '|a|^2'
plot 'trajectory.csv' using 1:($2**2+$3**2) with lines notitle
set ylabel 'S_x'
plot '' using 1:4 with lines title 'S1x', '' using 1:7 with lines title 'S2x'
set ylabel 'S_z'
set xlabel 't'
plot '' using 1:6 with lines title 'S1z', '' using 1:9 with lines title 'S2z'
unset multiplot
"
    )
}

pub fn phase_diagram() -> String {
    "\
set datafile separator ','
set xlabel 'N2/N1'
set ylabel 'lambda/kappa'
set cblabel 'number of fixed points'
set palette defined (4 'navy', 6 'orange', 8 'dark-red')
set cbrange [4:8]
plot 'regions.csv' using 1:2:3 with points pt 5 ps 0.6 palette notitle, \\
     'thresholds.csv' using 1:2 with lines lw 2 lc rgb 'white' notitle, \\
     '' using 1:3 with lines lw 2 lc rgb 'white' notitle
"
    .to_string()
}

pub fn line_cut() -> String {
    "\
set datafile separator ','
set xlabel 'lambda/kappa'
set multiplot layout 2,2
labels = '+zFo-N -zFo-N +zFi-N -zFi-N +xFo-SR -xFo-SR +xFi-SR -xFi-SR'
do for [col in '6 7 8 9'] {
  set ylabel word('S_x S_z dS_x E_0', int(col) - 5)
  plot for [i=1:8] 'line_cut.csv' using 1:(strcol(2) eq word(labels, i) && strcol(5) eq 'solid' ? column(int(col)) : NaN) with lines lw 2 notitle, \\
       for [i=1:8] 'line_cut.csv' using 1:(strcol(2) eq word(labels, i) && strcol(5) eq 'dashed' ? column(int(col)) : NaN) with lines dt 2 notitle
}
unset multiplot
"
    .to_string()
}

pub fn surface(file: &str, title: &str) -> String {
    format!(
        "\
set xlabel 'N2/N1'
set ylabel 'lambda/kappa'
set title '{title}'
set view map
plot '{file}' nonuniform matrix with image notitle
"
    )
}

pub fn quantum() -> String {
    "\
set datafile separator ','
set multiplot layout 1,2
set xlabel 't'
set ylabel '<a^+ a>'
plot 'observables.csv' using 1:4 with lines notitle
unset ylabel
set xlabel 'Re alpha'
set ylabel 'Im alpha'
set size square
set view map
plot 'q_function.dat' nonuniform matrix with image notitle
unset multiplot
"
    .to_string()
}
