/** Schematic district boundaries: a deterministic box layout grouped by
 * administrative city, so the choropleth renders without a map service. */

export interface Box {
  x: number;
  y: number;
}

const CITY_ORIGINS: Record<string, Box> = {
  "3101": { x: 16, y: 10 },   // Kepulauan Seribu (islands, top-left)
  "3175": { x: 210, y: 10 },  // Jakarta Utara
  "3174": { x: 40, y: 130 },  // Jakarta Barat
  "3173": { x: 250, y: 140 }, // Jakarta Pusat
  "3171": { x: 210, y: 270 }, // Jakarta Selatan
  "3172": { x: 440, y: 150 }, // Jakarta Timur
};

const CITY_DISTRICTS: Record<string, string[]> = {
  "3101": ["3101010", "3101020"],
  "3175": ["3175010", "3175020", "3175030", "3175040", "3175050", "3175060"],
  "3174": ["3174010", "3174020", "3174030", "3174040", "3174050", "3174060", "3174070", "3174080"],
  "3173": ["3173010", "3173020", "3173030", "3173040", "3173050", "3173060", "3173070", "3173080"],
  "3171": ["3171010", "3171020", "3171030", "3171040", "3171050", "3171060", "3171070", "3171080", "3171090", "3171100"],
  "3172": ["3172010", "3172020", "3172030", "3172040", "3172050", "3172060", "3172070", "3172080", "3172090", "3172100"],
};

export const BOX_SIZE = 44;
export const BOX_GAP = 5;
export const MAP_WIDTH = 700;
export const MAP_HEIGHT = 420;

export function districtBoxes(): Record<string, Box> {
  const boxes: Record<string, Box> = {};
  for (const [city, districts] of Object.entries(CITY_DISTRICTS)) {
    const origin = CITY_ORIGINS[city];
    districts.forEach((code, i) => {
      boxes[code] = {
        x: origin.x + (i % 4) * (BOX_SIZE + BOX_GAP),
        y: origin.y + Math.floor(i / 4) * (BOX_SIZE + BOX_GAP),
      };
    });
  }
  return boxes;
}

export const CITY_LABEL_ANCHORS: Record<string, Box> = CITY_ORIGINS;
