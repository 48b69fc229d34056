/** Typed client for the surveillance API.
 *
 * Every endpoint returns {watermark, generated_at, data}; the dashboard
 * renders data fields verbatim and shows the watermark it was computed at.
 */

export interface Envelope<T> {
  watermark: number;
  generated_at: string;
  data: T;
}

export interface Summary {
  as_of: string;
  confirmed: number;
  active: number;
  hospitalized: number;
  self_isolation: number;
  recovered: number;
  dead: number;
  asymptomatic: number;
  symptomatic: number;
  unknown_symptoms: number;
}

export interface CategoryCell {
  count: number;
  percent: number | null;
}

export interface CategoryEntry {
  total: number;
  buckets: Record<string, CategoryCell>;
}

export interface CategoryBreakdown {
  as_of: string;
  categories: Record<string, CategoryEntry>;
}

export interface DailyPoint {
  date: string;
  new_positive: number;
  new_recovered: number;
  new_dead: number;
  cumulative_positive: number;
  cumulative_recovered: number;
  cumulative_dead: number;
}

export interface CumulativePoint {
  date: string;
  hospitalized: number;
  self_isolation: number;
  recovered: number;
  dead: number;
  active: number;
  cumulative_confirmed: number;
}

export interface PositivityRow {
  date: string;
  people_tested: number;
  people_positive: number;
  people_negative: number;
  person_positivity: number | null;
  specimens_tested: number;
  specimens_positive: number;
  specimens_negative: number;
  specimen_positivity: number | null;
}

export interface RegionEntry {
  city: string;
  city_name: string;
  district?: string;
  district_name?: string;
  count: number;
  by_sex: Record<string, number>;
  by_age: Record<string, number>;
}

export interface RegionCounts {
  as_of: string;
  level: string;
  total: number;
  regions: RegionEntry[];
}

export interface Crosstab {
  as_of: string;
  matrix: Record<string, Record<string, number>>;
  total: number;
}

export interface NationalSummary {
  latest: {
    date: string;
    confirmed: number;
    active: number;
    recovered: number;
    dead: number;
  } | null;
}

export interface BedBoardRow {
  ward: string;
  no_data: boolean;
  total?: number;
  occupied?: number;
  available?: number;
  reported_at?: string;
  stale?: boolean;
}

export interface BedFinderRow {
  hospital: string;
  name: string;
  city: string;
  available: number;
  stale: boolean;
  reported_at: string;
}

export interface ProvinceCapacity {
  wards: Record<string, {
    total: number;
    occupied: number;
    available: number;
    remaining_fraction: number | null;
    reported: boolean;
  }>;
  stale_hospitals: string[];
}

export interface BedReportPayload {
  hospital: string;
  ward: string;
  total_beds: number;
  occupied_beds: number;
  reported_at: string;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private base: string,
    private credential?: string,
    private fetcher: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<Envelope<T>> {
    const response = await this.fetcher(this.base + path);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as Envelope<T>;
  }

  summary(asOf?: string): Promise<Envelope<Summary>> {
    return this.get(`/v1/summary${asOf ? `?as_of=${asOf}` : ""}`);
  }

  nationalSummary(): Promise<Envelope<NationalSummary>> {
    return this.get("/v1/summary/national");
  }

  categories(asOf?: string): Promise<Envelope<CategoryBreakdown>> {
    return this.get(`/v1/categories${asOf ? `?as_of=${asOf}` : ""}`);
  }

  dailySeries(from: string, to: string): Promise<Envelope<DailyPoint[]>> {
    return this.get(`/v1/series/daily?from=${from}&to=${to}`);
  }

  cumulativeSeries(from: string, to: string): Promise<Envelope<CumulativePoint[]>> {
    return this.get(`/v1/series/cumulative?from=${from}&to=${to}`);
  }

  positivity(from: string, to: string): Promise<Envelope<PositivityRow[]>> {
    return this.get(`/v1/positivity?from=${from}&to=${to}`);
  }

  regions(level: "city" | "district", asOf?: string): Promise<Envelope<RegionCounts>> {
    return this.get(`/v1/regions/${level}${asOf ? `?as_of=${asOf}` : ""}`);
  }

  crosstab(asOf?: string): Promise<Envelope<Crosstab>> {
    return this.get(`/v1/crosstab${asOf ? `?as_of=${asOf}` : ""}`);
  }

  bedBoard(hospital: string): Promise<Envelope<BedBoardRow[]>> {
    return this.get(`/v1/beds/${hospital}`);
  }

  provinceBeds(): Promise<Envelope<ProvinceCapacity>> {
    return this.get("/v1/beds");
  }

  findBeds(ward: string, minBeds: number): Promise<Envelope<BedFinderRow[]>> {
    return this.get(`/v1/beds/find?ward=${ward}&min_beds=${minBeds}`);
  }

  async submitBedReport(payload: BedReportPayload): Promise<Envelope<{ outcome: string }>> {
    const response = await this.fetcher(this.base + "/v1/beds/report", {
      method: "POST",
      headers: {
        "Content-Type": "application/json",
        ...(this.credential ? { Authorization: `Bearer ${this.credential}` } : {}),
      },
      body: JSON.stringify(payload),
    });
    if (!response.ok) {
      let detail = await response.text();
      try {
        detail = (JSON.parse(detail) as { detail?: string }).detail ?? detail;
      } catch {
        /* raw body is the message */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as Envelope<{ outcome: string }>;
  }
}

/** Last-response-wins per view: a response computed at an older watermark
 * than what the view already shows is stale and must be discarded. */
export function acceptResponse(currentWatermark: number | null, incoming: number): boolean {
  return currentWatermark === null || incoming >= currentWatermark;
}
