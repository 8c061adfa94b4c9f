import java.util.Arrays;

public class Main {
    public static void main(String[] args) {
        int[] data = {5, 1, 4, 2, 8};
        BubbleSort.sort(data);
        System.out.println(Arrays.toString(data));
    }
}
