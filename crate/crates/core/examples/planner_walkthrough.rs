use perch::fusion::{FusedPose, StageId};
use perch::planner::{is_terminal, planner_step, PlannerConfig, PlannerInput, PlannerState, SetpointMode, VehiclePose};

// Feeds the planner a scripted estimate and prints each phase change.
fn main() {
    let cfg = PlannerConfig::default();
    let mut state = PlannerState::new();
    let mut vehicle = VehiclePose { x: 0.0, y: 0.0, z: -60.0, yaw: 0.0 };
    let target_z = 0.0;

    for tick in 0..600u64 {
        let t = tick as f64 / 30.0;
        // target is lost for the first 20 ticks
        let fused = (tick >= 20).then(|| FusedPose {
            e_x: 4.0 - vehicle.x,
            e_y: -3.0 - vehicle.y,
            e_z: target_z - vehicle.z,
            e_psi: 25.0 - vehicle.yaw,
            stage: if target_z - vehicle.z > 20.0 { StageId::S1 } else { StageId::S3 },
            fresh: true,
        });
        let attached = target_z - vehicle.z < 0.5;
        let input = PlannerInput { fused, attached, tick_time: t, vehicle };
        let (next, sp) = planner_step(&state, &input, &cfg);
        if next.phase != state.phase || tick == 0 {
            println!("{tick:4}  {:<14} {:<14} z_d={:7.2}", next.phase.label(), sp.mode.label(), sp.z_d);
        }
        state = next;
        if is_terminal(&state) {
            break;
        }
        // crude vehicle: snaps halfway toward the setpoint
        vehicle.x += 0.5 * (sp.x_d - vehicle.x);
        vehicle.y += 0.5 * (sp.y_d - vehicle.y);
        vehicle.z = match sp.mode {
            SetpointMode::ThrottleBurst => vehicle.z + 2.0,
            _ => vehicle.z + 0.5 * (sp.z_d - vehicle.z),
        }
        .min(target_z);
        vehicle.yaw += 0.5 * perch::angle::shortest_arc(vehicle.yaw, sp.psi_d);
    }
    println!("final: {:?}", state.phase);
}
