// Slider and button factories for the knob panel and run controls.
// Sliders commit on release (the change event), not continuously, so
// one drag produces exactly one set_knobs message.

export interface SliderSpec {
    label: string;
    min: number;
    max: number;
    step: number;
    value: number;
    format?: (value: number) => string;
    oncommit: (value: number) => void;
}

export interface SliderHandle {
    root: HTMLElement;
    setValue(value: number): void;
    setEnabled(enabled: boolean): void;
}

export function createSlider(spec: SliderSpec): SliderHandle {
    const format = spec.format ?? ((value: number) => String(value));

    const root = document.createElement("label");
    root.className = "slider";

    const title = document.createElement("span");
    title.className = "slider-label";
    title.textContent = spec.label;

    const input = document.createElement("input");
    input.type = "range";
    input.min = String(spec.min);
    input.max = String(spec.max);
    input.step = String(spec.step);
    input.value = String(spec.value);

    const readout = document.createElement("span");
    readout.className = "slider-value";
    readout.textContent = format(spec.value);

    // Live readout while dragging; the command goes out on release.
    input.addEventListener("input", () => {
        readout.textContent = format(Number(input.value));
    });
    input.addEventListener("change", () => {
        spec.oncommit(Number(input.value));
    });

    root.append(title, input, readout);
    return {
        root,
        setValue(value: number) {
            input.value = String(value);
            readout.textContent = format(value);
        },
        setEnabled(enabled: boolean) {
            input.disabled = !enabled;
            root.classList.toggle("disabled", !enabled);
        },
    };
}

export interface ButtonHandle {
    root: HTMLButtonElement;
    setEnabled(enabled: boolean): void;
}

export function createButton(text: string, onclick: () => void): ButtonHandle {
    const root = document.createElement("button");
    root.type = "button";
    root.textContent = text;
    root.addEventListener("click", onclick);
    return {
        root,
        setEnabled(enabled: boolean) {
            root.disabled = !enabled;
        },
    };
}
