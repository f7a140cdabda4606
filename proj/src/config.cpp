#include "hydrostat/config.hpp"

#include "hydrostat/io.hpp"

#include <fstream>
#include <sstream>

namespace hydrostat {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

std::int64_t parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad integer value for " + key + ": '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad seed value for " + key + ": '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: bad boolean value for " + key + ": '" + v + "'");
}

std::array<double, 3> parse_vec3(const std::string& v, const std::string& key) {
    std::array<double, 3> out{};
    std::stringstream ss(v);
    std::string part;
    int i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) throw std::invalid_argument("config: " + key + " needs 3 components");
        out[i++] = parse_double(trim(part), key);
    }
    if (i != 3) throw std::invalid_argument("config: " + key + " needs 3 components");
    return out;
}

} // namespace

SimConfigFile parse_config(std::istream& in) {
    SimConfigFile c;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = line.substr(1, line.size() - 2);
            if (section != "grid" && section != "time" && section != "noise" &&
                section != "physics" && section != "ensemble" && section != "output")
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        std::string qual = section + "." + key;

        if (section == "grid") {
            if (key == "nx") c.nx = int(parse_int(val, qual));
            else if (key == "ny") c.ny = int(parse_int(val, qual));
            else if (key == "nz") c.nz = int(parse_int(val, qual));
            else if (key == "h") c.h = parse_double(val, qual);
            else throw std::invalid_argument("config line " + std::to_string(lineno) +
                                             ": unknown key " + qual);
        } else if (section == "time") {
            if (key == "dt") c.dt = parse_double(val, qual);
            else if (key == "n_steps") c.n_steps = parse_int(val, qual);
            else if (key == "diag_cadence") c.diag_cadence = int(parse_int(val, qual));
            else throw std::invalid_argument("config line " + std::to_string(lineno) +
                                             ": unknown key " + qual);
        } else if (section == "noise") {
            if (key == "kind") {
                if (val == "zero") c.noise_kind = SimConfigFile::NoiseZero;
                else if (val == "kraichnan") c.noise_kind = SimConfigFile::NoiseKraichnan;
                else if (val == "constant") c.noise_kind = SimConfigFile::NoiseConstant;
                else if (val == "file") c.noise_kind = SimConfigFile::NoiseFile;
                else throw std::invalid_argument("config: unknown noise kind '" + val + "'");
            }
            else if (key == "file") c.noise_file = val;
            else if (key == "N") c.noise_modes = int(parse_int(val, qual));
            else if (key == "s") c.noise_s = parse_double(val, qual);
            else if (key == "sigma") c.noise_sigma = parse_double(val, qual);
            else if (key == "seed") c.noise_seed = parse_u64(val, qual);
            else if (key == "delta") c.noise_delta = parse_double(val, qual);
            else if (key == "phi_h_x3_independent") c.phi_h_x3_independent = parse_bool(val, qual);
            else if (key == "phi3_boundary_vanish") c.phi3_boundary_vanish = parse_bool(val, qual);
            else if (key == "psi3_boundary_vanish") c.psi3_boundary_vanish = parse_bool(val, qual);
            else if (key == "gamma") {
                if (val == "zero") c.gamma_mode = SimConfigFile::GammaZero;
                else if (val == "grad_phi") c.gamma_mode = SimConfigFile::GammaGradPhi;
                else throw std::invalid_argument("config: unknown gamma mode '" + val + "'");
            }
            else if (key == "cphi") c.const_phi = parse_vec3(val, qual);
            else if (key == "cpsi") c.const_psi = parse_vec3(val, qual);
            else throw std::invalid_argument("config line " + std::to_string(lineno) +
                                             ": unknown key " + qual);
        } else if (section == "physics") {
            if (key == "mode") {
                if (val == "ito") c.mode = StepperConfig::Ito;
                else if (val == "stratonovich_corrected") c.mode = StepperConfig::StratonovichCorrected;
                else if (val == "stratonovich_heun") c.mode = StepperConfig::StratonovichHeun;
                else throw std::invalid_argument("config: unknown mode '" + val + "'");
            }
            else if (key == "bc_theta") {
                if (val == "weak_robin") c.bc_theta = StepperConfig::WeakRobin;
                else if (val == "strong_robin") c.bc_theta = StepperConfig::StrongRobin;
                else throw std::invalid_argument("config: unknown bc_theta '" + val + "'");
            }
            else if (key == "alpha") c.alpha = parse_double(val, qual);
            else if (key == "kappa") c.kappa = parse_double(val, qual);
            else if (key == "forcing") {
                if (val == "zero") c.forcing = SimConfigFile::ForcingZero;
                else if (val == "coriolis") c.forcing = SimConfigFile::ForcingCoriolis;
                else if (val == "damping") c.forcing = SimConfigFile::ForcingDamping;
                else throw std::invalid_argument("config: unknown forcing '" + val + "'");
            }
            else if (key == "k0") c.k0 = parse_double(val, qual);
            else if (key == "damping") c.damping = parse_double(val, qual);
            else throw std::invalid_argument("config line " + std::to_string(lineno) +
                                             ": unknown key " + qual);
        } else if (section == "ensemble") {
            if (key == "n_traj") c.n_traj = int(parse_int(val, qual));
            else if (key == "base_seed") c.base_seed = parse_u64(val, qual);
            else throw std::invalid_argument("config line " + std::to_string(lineno) +
                                             ": unknown key " + qual);
        } else if (section == "output") {
            if (key == "dir") c.output_dir = val;
            else if (key == "snapshots_every") c.snapshots_every = int(parse_int(val, qual));
            else if (key == "formats") {
                c.write_csv = val.find("csv") != std::string::npos;
                c.write_snapshots = val.find("snapshot") != std::string::npos;
                if (!c.write_csv && !c.write_snapshots)
                    throw std::invalid_argument("config: formats must name csv or snapshot");
            }
            else throw std::invalid_argument("config line " + std::to_string(lineno) +
                                             ": unknown key " + qual);
        } else {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": key outside any section");
        }
    }
    if (c.dt <= 0.0) throw std::invalid_argument("config: time.dt must be positive");
    if (c.n_steps < 0) throw std::invalid_argument("config: time.n_steps must be >= 0");
    if (c.diag_cadence < 1) throw std::invalid_argument("config: time.diag_cadence must be >= 1");
    if (c.n_traj < 1) throw std::invalid_argument("config: ensemble.n_traj must be >= 1");
    return c;
}

SimConfigFile parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    return parse_config(in);
}

NoiseBasis SimConfigFile::build_basis(const Grid& g) const {
    switch (noise_kind) {
        case NoiseZero:
            return make_constant_basis(g, {0, 0, 0}, {0, 0, 0}, 1);
        case NoiseConstant:
            return make_constant_basis(g, const_phi, const_psi, noise_modes);
        case NoiseFile: {
            NoiseBasis b = read_basis_file(noise_file);
            if (!(b.grid() == g))
                throw std::invalid_argument(
                    "config: basis file grid does not match [grid] section");
            return b;
        }
        case NoiseKraichnan: {
            KraichnanOptions opt;
            opt.n_modes = noise_modes;
            opt.spectral_decay = noise_s;
            opt.amplitude = noise_sigma;
            opt.seed = noise_seed;
            opt.phi_h_x3_independent = phi_h_x3_independent;
            opt.phi3_vanishes_on_boundary = phi3_boundary_vanish;
            opt.psi3_vanishes_on_boundary = psi3_boundary_vanish;
            opt.gamma_mode = gamma_mode == GammaGradPhi ? KraichnanOptions::GammaGradPhi
                                                        : KraichnanOptions::GammaZero;
            return make_kraichnan_basis(g, opt);
        }
    }
    return make_constant_basis(g, {0, 0, 0}, {0, 0, 0}, 1);
}

ForcingSpec SimConfigFile::build_forcing() const {
    switch (forcing) {
        case ForcingZero: return ForcingSpec::zero();
        case ForcingCoriolis: return ForcingSpec::coriolis(k0);
        case ForcingDamping: return ForcingSpec::linear_damping(damping);
    }
    return ForcingSpec::zero();
}

StepperConfig SimConfigFile::build_stepper_config() const {
    StepperConfig sc;
    sc.dt = dt;
    sc.mode = mode;
    sc.bc_theta = bc_theta;
    sc.alpha = alpha;
    return sc;
}

} // namespace hydrostat
